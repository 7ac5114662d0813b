int seed_5(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 16; i1++) { t += a[i1] * acc; t += a[i1] - acc; }
    return acc + t;
}
