#pragma once

// Umbrella header for the library.

#include "cmvn/error.hpp"
#include "cmvn/matrix.hpp"
#include "cmvn/random.hpp"
#include "cmvn/distributions.hpp"
#include "cmvn/dataset.hpp"
#include "cmvn/parallel.hpp"
#include "cmvn/ecm.hpp"
#include "cmvn/simulation.hpp"
#include "cmvn/selection.hpp"
#include "cmvn/evaluation.hpp"
#include "cmvn/io.hpp"
#include "cmvn/experiments.hpp"
