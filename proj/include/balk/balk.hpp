#pragma once

#include "balk/core.hpp"
#include "balk/axioms.hpp"
#include "balk/construct.hpp"
#include "balk/theorems.hpp"
#include "balk/pretangent.hpp"
#include "balk/io.hpp"
