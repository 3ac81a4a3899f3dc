// gelvec: command-line front end for gel-image diagnosis studies.
//
//   gelvec <subcommand> --manifest <path> [--seed N] [--out DIR]
//
// Exit status: 0 success, 1 validation error, 2 runtime error.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gelvec/study.hpp"

namespace {

constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

struct Options {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

gelvec::Study open_study(const Options& o) {
  gelvec::StudyManifest m = gelvec::load_manifest(o.manifest);
  if (o.seed) m.seed = *o.seed;
  if (o.out) m.output_dir = *o.out;
  return gelvec::Study(std::move(m));
}

void print_reports(const gelvec::Study& study, const std::vector<gelvec::ModeReport>& reports) {
  std::cout << gelvec::write_report(reports, study.manifest().study, study.manifest().seed, study.manifest().k).table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gelvec: 2D gel image normalization, vectorization and SVM diagnosis"};
  app.require_subcommand(1);

  Options opts;
  struct Stage {
    const char* name;
    const char* help;
  };
  const Stage stages[] = {
      {"synth", "render the manifest's synthetic cohort into image_dir"},
      {"refs", "resolve two reference points per image (annotations, else detection)"},
      {"normalize", "warp every image onto the canonical frame and crop the ROI"},
      {"featurize", "vectorize normalized ROIs (whole rectangle and/or chosen spots)"},
      {"train", "train the final SVM on all labelled samples"},
      {"predict", "apply the trained model to every featurized sample"},
      {"eval", "stratified k-fold cross-validation report"},
      {"pipeline", "run synth (if configured), refs, normalize, featurize, eval, train, predict"},
  };
  for (const Stage& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--manifest", opts.manifest, "study manifest (JSON)")->required();
    sub->add_option("--seed", opts.seed, "override the manifest's master seed");
    sub->add_option("--out", opts.out, "override the manifest's output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidationError;
  }

  try {
    gelvec::Study study = open_study(opts);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") {
      study.synth();
    } else if (cmd == "refs") {
      study.refs();
    } else if (cmd == "normalize") {
      study.normalize_all();
    } else if (cmd == "featurize") {
      study.featurize();
    } else if (cmd == "train") {
      study.train();
    } else if (cmd == "predict") {
      study.predict_all();
    } else if (cmd == "eval") {
      print_reports(study, study.eval());
    } else if (cmd == "pipeline") {
      print_reports(study, study.run_pipeline());
    }
  } catch (const gelvec::SchemaError& e) {
    std::cerr << "gelvec: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "gelvec: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
