#pragma once

#include "doctest.h"

// doctest's Approx adds an absolute term (scale 1) to its tolerance, which
// swamps relative checks on small quantities. This one is purely relative.
inline doctest::Approx approx(double value) { return doctest::Approx(value).scale(0.0); }
