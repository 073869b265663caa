#pragma once

#include "qrng/analysis/autocorrelation.hpp"
#include "qrng/analysis/battery.hpp"
#include "qrng/analysis/min_entropy.hpp"
#include "qrng/analysis/spectrum.hpp"
#include "qrng/analysis/stats.hpp"
#include "qrng/analysis/timing.hpp"
#include "qrng/config.hpp"
#include "qrng/detection.hpp"
#include "qrng/digest.hpp"
#include "qrng/error.hpp"
#include "qrng/extraction.hpp"
#include "qrng/interferometer.hpp"
#include "qrng/laser.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/random.hpp"
#include "qrng/signal.hpp"
#include "qrng/units.hpp"
