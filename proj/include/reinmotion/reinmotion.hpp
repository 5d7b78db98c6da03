#pragma once

#include "reinmotion/checkpoint.hpp"
#include "reinmotion/commands.hpp"
#include "reinmotion/config.hpp"
#include "reinmotion/dataset_io.hpp"
#include "reinmotion/diffusion.hpp"
#include "reinmotion/metrics.hpp"
#include "reinmotion/motion.hpp"
#include "reinmotion/motion_io.hpp"
#include "reinmotion/nn/adamw.hpp"
#include "reinmotion/nn/dense_net.hpp"
#include "reinmotion/nn/ndarray.hpp"
#include "reinmotion/nn/serialize.hpp"
#include "reinmotion/policy.hpp"
#include "reinmotion/random.hpp"
#include "reinmotion/rewards.hpp"
#include "reinmotion/synthdata.hpp"
#include "reinmotion/train.hpp"
