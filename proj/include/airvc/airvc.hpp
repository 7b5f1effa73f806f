#pragma once

#include "airvc/assignment.hpp"
#include "airvc/core.hpp"
#include "airvc/error.hpp"
#include "airvc/estimation.hpp"
#include "airvc/ingest.hpp"
#include "airvc/prediction.hpp"
#include "airvc/score_stats.hpp"
#include "airvc/simulator.hpp"
#include "airvc/tracker.hpp"
