#pragma once

#include "switchstab/constructions.hpp"
#include "switchstab/ctmc.hpp"
#include "switchstab/errors.hpp"
#include "switchstab/io.hpp"
#include "switchstab/linalg.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/planar.hpp"
#include "switchstab/quadrature.hpp"
#include "switchstab/rng.hpp"
#include "switchstab/spec_file.hpp"
#include "switchstab/switched.hpp"
