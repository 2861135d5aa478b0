#pragma once

#include "sparse_nash/config.hpp"
#include "sparse_nash/csv.hpp"
#include "sparse_nash/engine.hpp"
#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/heterogeneity.hpp"
#include "sparse_nash/isomorphism.hpp"
#include "sparse_nash/local_weak.hpp"
#include "sparse_nash/locality.hpp"
#include "sparse_nash/parallel.hpp"
#include "sparse_nash/rng.hpp"
#include "sparse_nash/scenario.hpp"
#include "sparse_nash/utility.hpp"
#include "sparse_nash/volterra.hpp"
