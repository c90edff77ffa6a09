#pragma once

#include "ellipmoment/common.hpp"
#include "ellipmoment/quadrature.hpp"
#include "ellipmoment/special_functions.hpp"
#include "ellipmoment/linalg.hpp"
#include "ellipmoment/rng.hpp"
#include "ellipmoment/generator_families.hpp"
#include "ellipmoment/elliptical.hpp"
#include "ellipmoment/expectation.hpp"
#include "ellipmoment/moments.hpp"
#include "ellipmoment/oracles.hpp"
#include "ellipmoment/verification.hpp"
