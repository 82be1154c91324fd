#pragma once

#include "gdd/autograd.hpp"
#include "gdd/checkpoint.hpp"
#include "gdd/config.hpp"
#include "gdd/dataset.hpp"
#include "gdd/dep_graph.hpp"
#include "gdd/dgat.hpp"
#include "gdd/embeddings.hpp"
#include "gdd/error.hpp"
#include "gdd/fft.hpp"
#include "gdd/local_encoder.hpp"
#include "gdd/metrics.hpp"
#include "gdd/model.hpp"
#include "gdd/ops.hpp"
#include "gdd/optim.hpp"
#include "gdd/proposition.hpp"
#include "gdd/rng.hpp"
#include "gdd/synthetic.hpp"
#include "gdd/tensor.hpp"
#include "gdd/train.hpp"
