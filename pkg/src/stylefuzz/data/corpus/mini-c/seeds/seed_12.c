int seed_12(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 8; i1++) { acc += b[i1] - acc; t = acc * k; }
    k += t * acc;
    for (int i2 = 0; i2 < 8; i2++) { t = b[i2] - 2; }
    return acc + t;
}
