#pragma once

#include "vgka/auth.hpp"
#include "vgka/cli.hpp"
#include "vgka/codec.hpp"
#include "vgka/cost.hpp"
#include "vgka/gka.hpp"
#include "vgka/group_comm.hpp"
#include "vgka/group_key.hpp"
#include "vgka/sim.hpp"
#include "vgka/ta.hpp"
