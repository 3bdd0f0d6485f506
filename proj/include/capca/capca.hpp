#pragma once

#include "capca/ca_engine.hpp"
#include "capca/dataset.hpp"
#include "capca/errors.hpp"
#include "capca/experiments.hpp"
#include "capca/io.hpp"
#include "capca/noise.hpp"
#include "capca/spectral.hpp"
