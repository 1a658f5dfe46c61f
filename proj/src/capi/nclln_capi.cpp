#include "nclln.h"
