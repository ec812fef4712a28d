#pragma once

#include "strigs/csv.hpp"
#include "strigs/dynamics.hpp"
#include "strigs/error.hpp"
#include "strigs/experiments.hpp"
#include "strigs/lyapunov.hpp"
#include "strigs/problem_models.hpp"
#include "strigs/quadrature.hpp"
#include "strigs/rng.hpp"
#include "strigs/schedules.hpp"
#include "strigs/tikhonov_path.hpp"
