#pragma once

#include "panelcp/detect.hpp"
#include "panelcp/error.hpp"
#include "panelcp/estimate.hpp"
#include "panelcp/infer.hpp"
#include "panelcp/panel.hpp"
#include "panelcp/select.hpp"
#include "panelcp/simlab.hpp"
