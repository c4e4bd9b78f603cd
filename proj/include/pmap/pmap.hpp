// Umbrella header for the perturb-and-MAP learning library.
#pragma once

#include "pmap/bounds.hpp"
#include "pmap/gumbel_crf.hpp"
#include "pmap/harness.hpp"
#include "pmap/io.hpp"
#include "pmap/linear.hpp"
#include "pmap/losses.hpp"
#include "pmap/proposal.hpp"
#include "pmap/rng.hpp"
#include "pmap/spaces.hpp"
#include "pmap/trainer.hpp"
