#ifndef LLBAR_LLBAR_HPP
#define LLBAR_LLBAR_HPP

#include "llbar/error.hpp"
#include "llbar/grid.hpp"
#include "llbar/field.hpp"
#include "llbar/spectral.hpp"
#include "llbar/calculus.hpp"
#include "llbar/snapshot.hpp"
#include "llbar/random.hpp"
#include "llbar/galerkin.hpp"
#include "llbar/integrator.hpp"
#include "llbar/estimates.hpp"
#include "llbar/inequality_lab.hpp"
#include "llbar/config.hpp"
#include "llbar/experiments.hpp"

#endif // LLBAR_LLBAR_HPP
