#pragma once

#include "gendyne/common.hpp"
#include "gendyne/fock.hpp"
#include "gendyne/gaussian.hpp"
#include "gendyne/povm.hpp"
#include "gendyne/scheme.hpp"
#include "gendyne/sme.hpp"
