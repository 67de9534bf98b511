#pragma once

#include "sticky/compose.hpp"
#include "sticky/constants.hpp"
#include "sticky/discretize.hpp"
#include "sticky/error.hpp"
#include "sticky/io.hpp"
#include "sticky/mc.hpp"
#include "sticky/model.hpp"
#include "sticky/model_json.hpp"
#include "sticky/numeric.hpp"
#include "sticky/pipeline.hpp"
#include "sticky/rate_function.hpp"
#include "sticky/regime.hpp"
#include "sticky/rng.hpp"
#include "sticky/semigroup.hpp"
#include "sticky/transforms.hpp"
#include "sticky/verify.hpp"
