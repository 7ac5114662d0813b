int scale(int x, int y) {
    return x * y + 1;
}

int seed_15(int n) {
    int a[32];
    int b[32];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (t < 32) { acc += acc + 5; t++; }
    if (acc > 0) { t += t - k; } else { acc = k * t; }
    return acc + t;
}
