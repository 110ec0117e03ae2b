#pragma once

#include "sge/assembly.hpp"
#include "sge/element.hpp"
#include "sge/jet.hpp"
#include "sge/linalg.hpp"
#include "sge/manufactured.hpp"
#include "sge/mesh.hpp"
#include "sge/quadrature.hpp"
#include "sge/space.hpp"
#include "sge/study.hpp"
#include "sge/verify.hpp"
