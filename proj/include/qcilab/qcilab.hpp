#pragma once

#include "qcilab/cutoff.hpp"
#include "qcilab/eliasson.hpp"
#include "qcilab/error.hpp"
#include "qcilab/fft.hpp"
#include "qcilab/grid.hpp"
#include "qcilab/masses.hpp"
#include "qcilab/oscillatory.hpp"
#include "qcilab/parallel.hpp"
#include "qcilab/quantization.hpp"
#include "qcilab/quasimodes.hpp"
#include "qcilab/runner.hpp"
#include "qcilab/scaling.hpp"
#include "qcilab/special.hpp"
#include "qcilab/surfaces.hpp"
