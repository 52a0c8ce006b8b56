#ifndef SRLAB_SRLAB_HPP
#define SRLAB_SRLAB_HPP

// Umbrella header.

#include "srlab/brackets.hpp"
#include "srlab/catalog.hpp"
#include "srlab/distance.hpp"
#include "srlab/dynamics.hpp"
#include "srlab/hamiltonian.hpp"
#include "srlab/io.hpp"
#include "srlab/model.hpp"
#include "srlab/numerics.hpp"
#include "srlab/poly.hpp"
#include "srlab/products.hpp"
#include "srlab/types.hpp"

#endif  // SRLAB_SRLAB_HPP
