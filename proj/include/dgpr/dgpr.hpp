#ifndef DGPR_DGPR_HPP
#define DGPR_DGPR_HPP

// Umbrella header: distributed Gaussian-process regression via
// finite-dimensional bases, with error bounds, SURE tuning and an
// average-consensus network simulator.

#include "dgpr/basis.hpp"
#include "dgpr/bounds.hpp"
#include "dgpr/consensus.hpp"
#include "dgpr/dataset.hpp"
#include "dgpr/eigensystem.hpp"
#include "dgpr/estimators.hpp"
#include "dgpr/experiments.hpp"
#include "dgpr/kernel.hpp"
#include "dgpr/measure.hpp"
#include "dgpr/protocols.hpp"
#include "dgpr/statistics.hpp"
#include "dgpr/sure.hpp"
#include "dgpr/synthetic.hpp"
#include "dgpr/topology.hpp"

#endif
