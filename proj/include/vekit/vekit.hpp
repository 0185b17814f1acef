#pragma once

#include "vekit/camera.hpp"
#include "vekit/character.hpp"
#include "vekit/math.hpp"
#include "vekit/mesh_asset.hpp"
#include "vekit/narrowphase.hpp"
#include "vekit/physics.hpp"
#include "vekit/runtime.hpp"
#include "vekit/scene_format.hpp"
#include "vekit/scene_graph.hpp"
#include "vekit/shapes.hpp"
#include "vekit/spatial.hpp"
#include "vekit/xml.hpp"
