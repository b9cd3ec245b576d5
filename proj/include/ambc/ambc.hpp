#pragma once

#include "config.hpp"
#include "rng.hpp"
#include "channel.hpp"
#include "metrics.hpp"
#include "simplex.hpp"
#include "barrier.hpp"
#include "subproblems.hpp"
#include "bcd.hpp"
#include "benchmark.hpp"
#include "io.hpp"
