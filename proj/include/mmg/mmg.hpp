#pragma once

#include "mmg/errors.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/quadrature.hpp"
#include "mmg/polynomial.hpp"
#include "mmg/problem.hpp"
#include "mmg/linalg.hpp"
#include "mmg/galerkin.hpp"
#include "mmg/newton.hpp"
#include "mmg/residual.hpp"
#include "mmg/rom.hpp"
#include "mmg/simulator.hpp"
#include "mmg/io.hpp"
#include "mmg/config.hpp"
#include "mmg/reproduce.hpp"
