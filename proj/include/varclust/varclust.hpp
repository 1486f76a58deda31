#ifndef VARCLUST_VARCLUST_HPP
#define VARCLUST_VARCLUST_HPP

#include "varclust/dataio.hpp"
#include "varclust/dataset.hpp"
#include "varclust/experiment.hpp"
#include "varclust/harness.hpp"
#include "varclust/local_clustering.hpp"
#include "varclust/merge.hpp"
#include "varclust/rng.hpp"
#include "varclust/summary.hpp"

#endif  // VARCLUST_VARCLUST_HPP
