// Umbrella header.
#pragma once

#include "amp.hpp"
#include "em.hpp"
#include "engine.hpp"
#include "enumerate.hpp"
#include "field.hpp"
#include "gaussian_msg.hpp"
#include "generate.hpp"
#include "io.hpp"
#include "kalman.hpp"
#include "linear_operator.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "selftest.hpp"
#include "sks.hpp"
#include "summary.hpp"
#include "sweep.hpp"
#include "taylor.hpp"
#include "thresholding.hpp"
