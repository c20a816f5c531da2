#pragma once

#include "attnlab/core/blur.hpp"
#include "attnlab/core/error.hpp"
#include "attnlab/core/geometry.hpp"
#include "attnlab/core/grid.hpp"
#include "attnlab/core/io.hpp"
#include "attnlab/core/normalize.hpp"
#include "attnlab/core/rng.hpp"
#include "attnlab/core/types.hpp"

#include "attnlab/codechart_render.hpp"
#include "attnlab/codecharts.hpp"
#include "attnlab/heatmaps.hpp"
#include "attnlab/metrics.hpp"
#include "attnlab/quality.hpp"
#include "attnlab/simulate.hpp"

#include "attnlab/service/assignment.hpp"
#include "attnlab/service/config.hpp"
#include "attnlab/service/payloads.hpp"
#include "attnlab/service/results.hpp"
#include "attnlab/service/scenario.hpp"
#include "attnlab/service/store.hpp"
