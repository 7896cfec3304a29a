#pragma once

#include "swipt/channel.hpp"
#include "swipt/codebook.hpp"
#include "swipt/constellation.hpp"
#include "swipt/eh_model.hpp"
#include "swipt/errors.hpp"
#include "swipt/io.hpp"
#include "swipt/mlp.hpp"
#include "swipt/numeric.hpp"
#include "swipt/rng.hpp"
#include "swipt/trainer.hpp"
