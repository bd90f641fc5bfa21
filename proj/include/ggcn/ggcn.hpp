#pragma once

#include "ggcn/data.hpp"
#include "ggcn/errors.hpp"
#include "ggcn/eval.hpp"
#include "ggcn/graph.hpp"
#include "ggcn/io.hpp"
#include "ggcn/loss.hpp"
#include "ggcn/model.hpp"
#include "ggcn/optim.hpp"
#include "ggcn/random.hpp"
#include "ggcn/tensor.hpp"
#include "ggcn/train.hpp"
