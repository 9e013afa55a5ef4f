#ifndef PCS_PCS_HPP
#define PCS_PCS_HPP

#include "pcs/autodiff.hpp"
#include "pcs/checkpoint.hpp"
#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/io.hpp"
#include "pcs/knn.hpp"
#include "pcs/losses.hpp"
#include "pcs/mesh.hpp"
#include "pcs/metrics.hpp"
#include "pcs/network.hpp"
#include "pcs/parallel.hpp"
#include "pcs/patching.hpp"
#include "pcs/pipeline.hpp"
#include "pcs/rng.hpp"
#include "pcs/saliency.hpp"
#include "pcs/sampling.hpp"
#include "pcs/trainer.hpp"

#endif
