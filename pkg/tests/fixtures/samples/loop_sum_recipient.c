float average(float data[], int n) {
    float sum1 = 0;
    float sum2 = 0;
    for (int i = 0; i < n; i++) {
        sum1 += data[i];
    }
    return sum1 / n;
}
