#pragma once

#include "adgraph/communities.hpp"
#include "adgraph/corpus.hpp"
#include "adgraph/domain.hpp"
#include "adgraph/error.hpp"
#include "adgraph/extractor.hpp"
#include "adgraph/graphs.hpp"
#include "adgraph/history.hpp"
#include "adgraph/power_law.hpp"
#include "adgraph/rational.hpp"
#include "adgraph/stats.hpp"
