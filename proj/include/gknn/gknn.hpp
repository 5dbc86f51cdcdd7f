#pragma once

// Umbrella header.

#include "gknn/errors.hpp"
#include "gknn/experiment.hpp"
#include "gknn/geodesic_knn.hpp"
#include "gknn/graph.hpp"
#include "gknn/io.hpp"
#include "gknn/manifold.hpp"
#include "gknn/metric_space.hpp"
#include "gknn/regression.hpp"
#include "gknn/version.hpp"
