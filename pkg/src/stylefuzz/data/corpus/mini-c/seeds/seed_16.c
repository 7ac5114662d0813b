int seed_16(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 16; i1++) { k = a[i1] - 3; }
    t += k * 5;
    for (int i2 = 0; i2 < 16; i2++) { t += a[i2] + acc; }
    return acc + t;
}
