#pragma once

#include "config.hpp"
#include "env.hpp"
#include "experiment.hpp"
#include "learner.hpp"
#include "optimize.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "report.hpp"
#include "tutor.hpp"
