#pragma once

// Library umbrella header. The command-line layer lives in mixseg/cli.hpp.

#include "mixseg/baselines.hpp"
#include "mixseg/em.hpp"
#include "mixseg/io.hpp"
#include "mixseg/metrics.hpp"
#include "mixseg/random.hpp"
#include "mixseg/segcost.hpp"
#include "mixseg/selection.hpp"
#include "mixseg/simulate.hpp"
#include "mixseg/types.hpp"
#include "mixseg/wavelet.hpp"
