#pragma once

// Umbrella header: multi-view embeddings (MBFA/IBFA/MCCA) and the zero-shot
// classification pipeline built on them.

#include "mbfa/csv.hpp"
#include "mbfa/data.hpp"
#include "mbfa/eigen.hpp"
#include "mbfa/embedding.hpp"
#include "mbfa/errors.hpp"
#include "mbfa/evaluation.hpp"
#include "mbfa/matrix.hpp"
#include "mbfa/model_io.hpp"
#include "mbfa/pipeline.hpp"
#include "mbfa/rng.hpp"
