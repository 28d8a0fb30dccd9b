#include <cstdio>

int main() {
  std::puts("wslam: pipeline CLI under construction");
  return 64;
}
