#pragma once

// Umbrella header.

#include "owr/adaptive.hpp"
#include "owr/aggregator.hpp"
#include "owr/analysis.hpp"
#include "owr/config.hpp"
#include "owr/errors.hpp"
#include "owr/filters.hpp"
#include "owr/harness.hpp"
#include "owr/loss.hpp"
#include "owr/owd.hpp"
#include "owr/paramfree.hpp"
#include "owr/stream.hpp"
#include "owr/wavelets.hpp"
