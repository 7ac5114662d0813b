int scale(int x, int y) {
    return x * y + 1;
}

int seed_10(int n) {
    int a[32];
    int b[32];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 32; i1++) { k += k + acc; k += b[i1] * acc; }
    if (k > 0) { k = t - acc; } else { acc = k * acc; }
    return acc + t;
}
