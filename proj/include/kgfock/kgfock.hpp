#pragma once

#include "spectral.hpp"
#include "propagator.hpp"
#include "nonlinearity.hpp"
#include "multiset.hpp"
#include "fockspace.hpp"
#include "majorant.hpp"
#include "quadrature.hpp"
#include "texp.hpp"
#include "trees.hpp"
#include "dynamics.hpp"
#include "conserved.hpp"
#include "io.hpp"
#include "selftest.hpp"
