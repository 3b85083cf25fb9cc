#pragma once

#include "vsr/calibrate.hpp"
#include "vsr/corpus.hpp"
#include "vsr/error.hpp"
#include "vsr/ingest.hpp"
#include "vsr/reject.hpp"
#include "vsr/report.hpp"
#include "vsr/stats.hpp"
#include "vsr/survey.hpp"
#include "vsr/types.hpp"
