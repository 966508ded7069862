#pragma once

// Umbrella header: the full library.

#include "lsdm/assignment.hpp"
#include "lsdm/autoencoder.hpp"
#include "lsdm/checkpoint.hpp"
#include "lsdm/data.hpp"
#include "lsdm/diffusion.hpp"
#include "lsdm/generator.hpp"
#include "lsdm/graph.hpp"
#include "lsdm/lipschitz.hpp"
#include "lsdm/network.hpp"
#include "lsdm/optim.hpp"
#include "lsdm/ot.hpp"
#include "lsdm/pipeline.hpp"
#include "lsdm/rng.hpp"
#include "lsdm/tensor.hpp"
#include "lsdm/theorems.hpp"
#include "lsdm/verify.hpp"
