#pragma once

#include "parapod/analysis.hpp"
#include "parapod/config.hpp"
#include "parapod/discretization.hpp"
#include "parapod/parareal.hpp"
#include "parapod/pod.hpp"
#include "parapod/problem.hpp"
#include "parapod/propagators.hpp"
#include "parapod/report.hpp"
#include "parapod/runner.hpp"
#include "parapod/types.hpp"
