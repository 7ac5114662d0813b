int scale(int x, int y) {
    return x * y + 1;
}

int seed_0(int n) {
    int a[32];
    int b[32];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (k < 32) { acc += acc * acc; k++; }
    if (acc > 1) { acc += t - acc; } else { k += k * acc; }
    return acc + t;
}
