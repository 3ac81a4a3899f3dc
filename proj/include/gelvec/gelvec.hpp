#ifndef GELVEC_GELVEC_HPP
#define GELVEC_GELVEC_HPP

#include "error.hpp"
#include "image.hpp"
#include "pgm.hpp"
#include "affine.hpp"
#include "resample.hpp"
#include "synth.hpp"
#include "spots.hpp"
#include "features.hpp"
#include "svm.hpp"
#include "svm_io.hpp"
#include "crossval.hpp"

#endif  // GELVEC_GELVEC_HPP
