int seed_17(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (acc < 16) { t += t + 6; acc++; }
    if (t > 2) { t += k * acc; } else { t += k - t; }
    return acc + t;
}
