#pragma once

#include "swrn/checkpoint.hpp"
#include "swrn/dataset.hpp"
#include "swrn/image_io.hpp"
#include "swrn/metrics.hpp"
#include "swrn/model.hpp"
#include "swrn/ops.hpp"
#include "swrn/quant.hpp"
#include "swrn/recurrence.hpp"
#include "swrn/resample.hpp"
#include "swrn/run_config.hpp"
#include "swrn/synth.hpp"
#include "swrn/tensor.hpp"
#include "swrn/training.hpp"
