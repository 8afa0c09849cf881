// Umbrella header.
#pragma once

#include "pram/core.hpp"
#include "pram/estimator.hpp"
#include "pram/io.hpp"
#include "pram/losses.hpp"
#include "pram/optimizer.hpp"
#include "pram/parallel.hpp"
#include "pram/penalties.hpp"
#include "pram/random.hpp"
#include "pram/simulation.hpp"
#include "pram/tuning.hpp"
