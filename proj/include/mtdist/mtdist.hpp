#pragma once

#include "datagen.hpp"
#include "edit_model.hpp"
#include "ip.hpp"
#include "kernel_search.hpp"
#include "matrix.hpp"
#include "merge_tree.hpp"
#include "reencode.hpp"
#include "solve.hpp"
