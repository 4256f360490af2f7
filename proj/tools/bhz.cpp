#include "bhz/fol.hpp"
int main() { return 0; }
