#ifndef NPSS_NPSS_HPP_
#define NPSS_NPSS_HPP_

#include "npss/eval.hpp"
#include "npss/ltss.hpp"
#include "npss/matrix.hpp"
#include "npss/matrix_io.hpp"
#include "npss/parallel.hpp"
#include "npss/pvalues.hpp"
#include "npss/rng.hpp"
#include "npss/scan.hpp"
#include "npss/score.hpp"
#include "npss/synth.hpp"

#endif  // NPSS_NPSS_HPP_
