#pragma once

// Everything in one include.

#include <dyadic/core.hpp>
#include <dyadic/instance.hpp>
#include <dyadic/operators.hpp>
#include <dyadic/sparse.hpp>
#include <dyadic/testing.hpp>
#include <dyadic/potentials.hpp>
#include <dyadic/norm.hpp>
#include <dyadic/counterexample.hpp>
#include <dyadic/experiments.hpp>
