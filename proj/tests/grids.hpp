#pragma once

#include "so3kit/rotation.hpp"

// repulsion grids are expensive at large N; tests share one instance per size
const so3kit::Grid& shared_repulsion(so3kit::Space space, int n);
