#pragma once

#include "biortho/bounds.hpp"
#include "biortho/catalog.hpp"
#include "biortho/control.hpp"
#include "biortho/errors.hpp"
#include "biortho/export.hpp"
#include "biortho/gram.hpp"
#include "biortho/linalg.hpp"
#include "biortho/paley_wiener.hpp"
#include "biortho/precision.hpp"
#include "biortho/quadrature.hpp"
#include "biortho/sequences.hpp"
#include "biortho/tail_sums.hpp"
