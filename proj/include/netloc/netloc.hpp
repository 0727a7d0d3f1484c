#pragma once

#include "netloc/direct.hpp"
#include "netloc/experiment.hpp"
#include "netloc/io.hpp"
#include "netloc/manifold.hpp"
#include "netloc/mds.hpp"
#include "netloc/measurements.hpp"
#include "netloc/metrics.hpp"
#include "netloc/pathloss.hpp"
#include "netloc/random.hpp"
#include "netloc/sdp.hpp"
#include "netloc/simulator.hpp"
#include "netloc/spring.hpp"
