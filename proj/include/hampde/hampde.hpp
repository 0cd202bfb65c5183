#pragma once

// Everything except the command-line layer (hampde/cli.hpp).
#include "hampde/config.hpp"
#include "hampde/diophantine.hpp"
#include "hampde/dynamics.hpp"
#include "hampde/fft.hpp"
#include "hampde/floer.hpp"
#include "hampde/krylov.hpp"
#include "hampde/model.hpp"
#include "hampde/nonlinearity.hpp"
#include "hampde/periodic.hpp"
#include "hampde/precision.hpp"
#include "hampde/spectral.hpp"
