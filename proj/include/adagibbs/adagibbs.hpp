#pragma once

#include "adagibbs/adapt.hpp"
#include "adagibbs/blasso.hpp"
#include "adagibbs/csv.hpp"
#include "adagibbs/data.hpp"
#include "adagibbs/diagnostics.hpp"
#include "adagibbs/dpmm.hpp"
#include "adagibbs/error.hpp"
#include "adagibbs/experiments.hpp"
#include "adagibbs/lda.hpp"
#include "adagibbs/linalg.hpp"
#include "adagibbs/metrics.hpp"
#include "adagibbs/niw.hpp"
#include "adagibbs/random.hpp"
#include "adagibbs/scan.hpp"
#include "adagibbs/scripted.hpp"
#include "adagibbs/svg_plot.hpp"
