#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "gelvec/study.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(GELVEC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_manifest(const std::string& name, const gelvec::Json& m) {
  const fs::path dir = fs::temp_directory_path() / ("gelvec_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  gelvec::write_file(dir / "manifest.json", m.dump(2));
  return dir / "manifest.json";
}

gelvec::Json manifest() {
  gelvec::Json cohort = gelvec::cohort_json(gelvec::default_cohort_spec());
  cohort["n_normal"] = 5;
  cohort["n_disease"] = 5;
  return {{"cohort", cohort},
          {"canonical", {{"refs", {{"a", {48, 44}}, {"b", {140, 136}}}}}},
          {"roi", {{"width", 96}, {"height", 96}}},
          {"representation", {{"mode", "spots"}, {"seeds", gelvec::Json::array({{72, 60}, {108, 58}})}}},
          {"cv", {{"k", 2}}}};
}

}  // namespace

TEST(Cli, StagesRunIndependently) {
  const fs::path m = write_manifest("stages", manifest());
  const fs::path out = m.parent_path() / "custom_out";
  const std::string common = "--manifest " + m.string() + " --out " + out.string() + " --seed 3";
  for (const char* stage : {"synth", "refs", "normalize", "featurize", "train", "predict", "eval"})
    ASSERT_EQ(run(std::string(stage) + " " + common), 0) << stage;
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "predictions_spots.tsv"));
  EXPECT_EQ(gelvec::Json::parse(gelvec::read_file(out / "report.json"))["seed"], 3);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("pipeline --manifest " + write_manifest("ok", manifest()).string()), 0);

  gelvec::Json no_roi = manifest();
  no_roi.erase("roi");
  EXPECT_EQ(run("pipeline --manifest " + write_manifest("noroi", no_roi).string()), 1);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_EQ(run("eval"), 1);  // --manifest is required

  gelvec::Json missing = manifest();
  missing.erase("cohort");
  missing["image_dir"] = "does-not-exist";
  EXPECT_EQ(run("pipeline --manifest " + write_manifest("missing", missing).string()), 2);
  EXPECT_EQ(run("pipeline --manifest /nonexistent/manifest.json"), 2);
}
