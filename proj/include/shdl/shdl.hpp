#pragma once

#include "shdl/builder.hpp"
#include "shdl/error.hpp"
#include "shdl/expr.hpp"
#include "shdl/interfaces.hpp"
#include "shdl/interp.hpp"
#include "shdl/module.hpp"
#include "shdl/schedule.hpp"
#include "shdl/section.hpp"
#include "shdl/verilog.hpp"
