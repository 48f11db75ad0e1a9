#pragma once

#include "mcrt/brownian.hpp"
#include "mcrt/curve.hpp"
#include "mcrt/diagnostics.hpp"
#include "mcrt/embedding.hpp"
#include "mcrt/error.hpp"
#include "mcrt/faces.hpp"
#include "mcrt/harmonic.hpp"
#include "mcrt/io.hpp"
#include "mcrt/map.hpp"
#include "mcrt/parallel.hpp"
#include "mcrt/rng.hpp"
#include "mcrt/walk.hpp"
